package price;

import org.springframework.stereotype.Service;

@Service
public class PriceService {
    private final PriceRepository priceRepository;

    public PriceService(PriceRepository priceRepository) {
        this.priceRepository = priceRepository;
    }

    public PriceResult compute(PriceQuery q) {
        PriceRule rule = priceRepository.findRule(q.getRoute());
        PriceResult r = new PriceResult();
        r.setAmount(rule.getRate() * q.getDistance());
        return r;
    }
}
