package order;

import org.springframework.http.HttpMethod;
import org.springframework.stereotype.Service;
import org.springframework.web.client.RestTemplate;

@Service
public class OrderService {
    private final RestTemplate restTemplate;
    private final OrderRepository orderRepository;

    public OrderService(RestTemplate restTemplate, OrderRepository orderRepository) {
        this.restTemplate = restTemplate;
        this.orderRepository = orderRepository;
    }

    public Order get(String id) {
        return orderRepository.findByOrderId(id);
    }

    public Order create(Order order) {
        Station from = restTemplate.exchange("http://ts-station/api/v1/stations/" + order.getFrom(), HttpMethod.GET, null, Station.class);
        PriceResult price = restTemplate.postForObject("http://ts-price/api/v1/price/query", order, PriceResult.class);
        order.setPrice(price.getAmount());
        return order;
    }

    public String status(String id) {
        return "open";
    }
}
