package station;

import org.springframework.stereotype.Service;
import org.springframework.web.client.RestTemplate;

@Service
public class StationService {
    private final StationRepository stationRepository;
    private final RestTemplate restTemplate;
    private String priceBase;

    public StationService(StationRepository stationRepository, RestTemplate restTemplate) {
        this.stationRepository = stationRepository;
        this.restTemplate = restTemplate;
    }

    public Station find(String id) {
        return stationRepository.findByStationId(id);
    }

    public int count() {
        return stationRepository.countAll();
    }

    public Object ordersAt(String id) {
        return restTemplate.getForObject("http://ts-order/api/v1/orders/" + id, Object.class);
    }
}
